# Copyright (C) 2026 - Today: mixdim-solve contributors
# License AGPL-3.0 or later (http://www.gnu.org/licenses/agpl.html).

import setuptools

setuptools.setup(
    name="mixdim-solve",
    version="0.1.0",
    author="mixdim-solve contributors",
    description="Fitted finite elements, Schur complement reduction and"
    " two-level subspace preconditioning for 2D bulk/interface problems",
    long_description=open("README.rst").read(),
    long_description_content_type="text/x-rst",
    packages=["mixdim_solve"],
    package_data={"mixdim_solve": ["experiments/*.yaml"]},
    include_package_data=True,
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: GNU Affero General Public License v3",
        "Environment :: Console",
    ],
    install_requires=open("requirements.txt").read().splitlines(),
    entry_points=dict(
        console_scripts=[
            "mixdim-solve=mixdim_solve.__main__:main",
        ]
    ),
    keywords=[
        "Finite Elements",
        "Mixed-dimensional",
        "Schur complement",
        "Domain decomposition",
        "Preconditioner",
    ],
)
