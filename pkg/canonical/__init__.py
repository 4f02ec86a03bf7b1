"""
Canonical数据模型层
定义几何、流场、数据集清单与训练配置等共享模型，以及异常层次和通道标准化工具
"""

__version__ = "1.0.0"
