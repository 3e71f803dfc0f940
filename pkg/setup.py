"""
Setup script for the glassflow package.

This is maintained for backward compatibility.
The primary build configuration is in pyproject.toml.
"""

from setuptools import setup, find_packages

setup(
    name="glassflow",
    version="0.1.0",
    packages=find_packages(include=["glassflow*"]),
    python_requires=">=3.8",
    entry_points={"console_scripts": ["glassflow=glassflow.cli:main"]},
)
