""" Installation instructions for the msktap multiscale kinetic simulator. """

from os import path

from setuptools import setup, find_packages

here = path.abspath(path.dirname(__file__))

with open("README.md", "r", encoding="utf-8") as f:
    long_description = f.read()

setup(
    name="msktap",
    version="0.1.0",
    description="Multiscale kinetic-theory simulation of active particles with signal-mediated interactions.",
    long_description=long_description,
    long_description_content_type="text/markdown",
    license="AGPL-3.0-or-later",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
        "License :: OSI Approved :: GNU Affero General Public License v3 or later (AGPLv3+)",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
    ],
    keywords="kinetic theory, active particles, simulation",
    packages=find_packages(exclude=["contrib", "docs", "resources", "tests*"]),
    package_data={"msktap": ["config.json"]},
    python_requires=">=3.10",
    install_requires=["numpy>=1.26", "pillow>=11.0", "regex>=2024.11"],
    entry_points={"console_scripts": ["msktap=msktap.cli:main"]},
)
