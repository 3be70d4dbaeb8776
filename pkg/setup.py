#!/usr/bin/env python
import sys
from doctest import DocTestSuite
from unittest import TestLoader, TextTestRunner

from setuptools import Command, setup

PYTHON_MODULES = [
    "bhblow",
    "bhblow.__main__",
    "bhblow.cli",
    "bhblow.config",
    "bhblow.evolve",
    "bhblow.experiment",
    "bhblow.grid",
    "bhblow.hilbert",
    "bhblow.initial",
    "bhblow.profile",
    "bhblow.selfsim",
    "bhblow.verify",
    "bhblow.util",
    "bhblow.util.fit",
    "bhblow.util.snapshot",
    "bhblow.util.table",
    "bhblow.tests",
    "bhblow.tests.samples",
    "bhblow.tests.test_cli",
    "bhblow.tests.test_config",
    "bhblow.tests.test_evolve",
    "bhblow.tests.test_experiment",
    "bhblow.tests.test_grid",
    "bhblow.tests.test_hilbert",
    "bhblow.tests.test_initial",
    "bhblow.tests.test_profile",
    "bhblow.tests.test_selfsim",
    "bhblow.tests.test_util_fit",
    "bhblow.tests.test_util_snapshot",
    "bhblow.tests.test_util_table",
    "bhblow.tests.test_verify",
]


class RunTests(Command):
    description = "run test suite"
    user_options = []
    initialize_options = finalize_options = lambda self: None

    def run(self):
        tests = TestLoader().loadTestsFromName("bhblow.tests")
        for module in PYTHON_MODULES:
            if module == "bhblow.__main__":
                continue
            try:
                doctests = DocTestSuite(module)
            except ValueError:
                continue
            tests.addTests(doctests)
        result = TextTestRunner(verbosity=1).run(tests)
        sys.exit(not result.wasSuccessful())


setup(
    name="bhblow",
    version="0.1.0",
    description="Numerical laboratory for Burgers-Hilbert shock formation",
    packages=["bhblow", "bhblow.util", "bhblow.tests"],
    install_requires=["numpy>=1.20", "scipy>=1.7"],
    entry_points={"console_scripts": ["bhblow = bhblow.cli:main"]},
    python_requires=">=3.7",
    cmdclass={"test": RunTests},
    license="BSD",
)
