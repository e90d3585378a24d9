"""
Helper programs the test suite runs as subprocesses, such as the fake UCI
engine used in place of a real one.
"""
