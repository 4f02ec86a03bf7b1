"""
配置管理模块
环境配置（输出目录、线程数、解码分块、日志）与运行配置（gen/model/train/eval/bench）
"""

__version__ = "1.0.0"
