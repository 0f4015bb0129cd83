from setuptools import setup

# Minimal shim for environments expecting setup.py
setup()
