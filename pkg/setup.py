from setuptools import find_packages, setup

with open("README.md", "r") as file:
    long_description = file.read()

setup(
    name="weakcoupling",
    version="0.0.1",
    author="Jonas Niemeyer",
    description="Numerical experiments on weakly coupled bound states below and at the Fermi sphere",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests"]),
    install_requires=["numpy", "scipy", "pandas"],
    extras_require={"test": ["pytest"]},
    entry_points={"console_scripts": ["weakcoupling=weakcoupling.cli:main"]}
)
