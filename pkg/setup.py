"""Setup configuration for periodforge."""

from pathlib import Path

from setuptools import find_packages, setup

this_directory = Path(__file__).parent
long_description = (this_directory / "README.md").read_text(encoding="utf-8")

# Read version from package
version_file = this_directory / "src" / "periodforge" / "__init__.py"
version = None
with open(version_file, "r", encoding="utf-8") as f:
    for line in f:
        if line.startswith("__version__"):
            version = line.split('"')[1]
            break

if not version:
    raise RuntimeError("Cannot find version information")

setup(
    name="periodforge",
    version=version,
    description="Period solving, limit checks and meshes for doubly periodic CL minimal surfaces",
    long_description=long_description,
    long_description_content_type="text/markdown",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Topic :: Scientific/Engineering :: Mathematics",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Operating System :: OS Independent",
    ],
    package_dir={"": "src"},
    packages=find_packages(where="src"),
    python_requires=">=3.8",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.8",
        "mpmath>=1.2",
        "pydantic>=2.0",
    ],
    extras_require={
        "yaml": ["pyyaml>=5.4"],
        "all": ["pyyaml>=5.4"],
        "dev": [
            "pytest>=7.0",
            "pytest-cov>=4.0",
            "pytest-mock>=3.10",
            "black>=23.0",
            "flake8>=6.0",
            "mypy>=1.0",
            "tox>=4.0",
        ],
    },
    entry_points={"console_scripts": ["periodforge=periodforge.cli:main"]},
    keywords=["minimal-surface", "weierstrass", "period-problem", "mesh"],
    include_package_data=True,
    zip_safe=False,
)
