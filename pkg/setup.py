#!/usr/bin/env python3
"""
Setup script for GraviCollapse
"""

from setuptools import setup, find_packages

# Read README file
def read_readme():
    with open("README.md", "r", encoding="utf-8") as fh:
        return fh.read()

# Read requirements
def read_requirements():
    with open("requirements.txt", "r", encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip() and not line.startswith("#")]

setup(
    name="gravicollapse",
    version="0.1.0",
    author="GraviCollapse Team",
    author_email="",
    description="Gravity-related decoherence and collapse of massive superpositions on a 1D grid",
    long_description=read_readme(),
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["examples", "examples.*"]),
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    python_requires=">=3.8",
    install_requires=read_requirements(),
    extras_require={
        "dev": ["pytest>=6.0.0"],
    },
    entry_points={
        "console_scripts": [
            "gravicollapse=gravicollapse.src.cli:main",
        ],
    },
    include_package_data=True,
    package_data={
        "": ["*.md", "*.json"],
    },
)
