"""
Shoewear
--------

Temporal shoeprint-wear modelling: a conditional convolutional auto-encoder that
predicts worn (forward) or restored (backward) outsole impressions, together with
the impression denoiser, SSIM/PSNR evaluation and a synthetic wear-dataset generator.
"""

__version__ = '0.1.0'
