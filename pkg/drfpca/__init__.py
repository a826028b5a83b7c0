"""
DRFPCA: 分布鲁棒公平主成分分析
"""

__version__ = "1.0.0"
