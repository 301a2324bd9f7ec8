from setuptools import setup, find_packages

setup(
    name="shoewear",
    version="0.1.0",
    packages=find_packages(),
    package_data={"shoewear.config": ["config.yaml"]},
    install_requires=[
        "pandas>=1.5.0",
        "numpy>=1.21.0",
        "scipy>=1.9.0",
        "pyyaml>=6.0",
        "tabulate>=0.9.0",
        "pytest>=7.3.1",
        "pytest-mock>=3.10.0"
    ],
    entry_points={
        "console_scripts": ["shoewear=shoewear.app:main"],
    },
)
