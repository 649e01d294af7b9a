from setuptools import setup

__version__ = (0, 3, 1)

setup(
    name="ncgilab",
    description="Numerical verification of the semifinite local index formula "
                "on lattice spectral triples",
    keywords="noncommutative geometry spectral triple index cyclic cohomology",
    packages=['ncgilab'],
    version='.'.join(str(d) for d in __version__),
    zip_safe=True,
    install_requires=['numpy', 'scipy', 'cached-property', 'PyYAML'],
    entry_points={
        'console_scripts': ['ncgilab = ncgilab.cli:main'],
    },
    classifiers=[
        'Development Status :: 4 - Beta',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: GNU General Public License v3 (GPLv3)',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3.7',
        'Programming Language :: Python :: 3.8',
        'Topic :: Scientific/Engineering :: Mathematics',
    ]
)
