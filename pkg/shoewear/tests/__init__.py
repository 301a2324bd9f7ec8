"""Test suite for the shoewear package."""
