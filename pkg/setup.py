# Imports
from setuptools import setup, find_packages

# Loading README file
with open("README.md", "r") as f:
    long_description = f.read()
with open("requirements.txt", "r") as f:
    requirements = f.read()


setup(
    name='icefill',
    version='1.0.0',
    license='GPL-3.0',
    description='Pilot design and MMSE channel estimation for dense antenna arrays',
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "examples*"]),
    keywords=['mimo', 'channel estimation', 'pilot design', 'water-filling'],
    install_requires=requirements,
    classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering',
        'License :: OSI Approved :: GNU General Public License v3 (GPLv3)',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.8',
    ],
    entry_points = {
        'console_scripts' : [
            'icefill = icefill.cli.main:run',
        ]
    }
)
