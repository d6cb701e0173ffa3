from setuptools import setup, find_packages
from codecs import open
import os
import re

with open("README.rst", "r") as f:
    long_description = f.read()

with open("requirements.txt", "r") as f:
    requirements = f.read().splitlines()

def get_version():
    here = os.path.abspath(os.path.dirname(__file__))
    version_file = os.path.join(here, "porous_adjoint", "__version__.py")

    with open(version_file, "r") as vf:
        lines = vf.read()
        version = re.search(r"^_*version_* = ['\"]([^'\"]*)['\"]", lines, re.M).group(1)
        return version


porous_adjoint_version = get_version()

setup(
    name="porous-adjoint",
    version=porous_adjoint_version,
    description="Adjoint sensitivities of the total dissipation rate in Darcy and Darcy-Brinkman flow.",
    long_description=long_description,
    install_requires=requirements,
    extras_require={
        "test": ["pytest", "pytest-cov", "hypothesis"],
        "docs": ["sphinx", "sphinx_rtd_theme"],
    },
    entry_points={
        "console_scripts": ["porous-adjoint = porous_adjoint.cli:main"],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "License :: OSI Approved :: MIT License",
        "Operating System :: MacOS",
        "Operating System :: Unix",
        "Topic :: Scientific/Engineering",
        ],
    package_dir={"porous_adjoint": "porous_adjoint"},
    packages=find_packages(),
    keywords=("porous media Darcy Brinkman adjoint sensitivity topology optimization permeability dissipation")
)
