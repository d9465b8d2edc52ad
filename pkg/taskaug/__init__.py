from taskaug.version import VERSION

__version__ = VERSION
