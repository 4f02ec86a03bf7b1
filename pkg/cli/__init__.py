"""
命令行模块
"""

__version__ = "1.0.0"
