"""
异常定义，每类异常携带命令行退出码
"""


class DrfpcaError(Exception):
    """所有库异常的基类"""
    exit_code = 1


class ValidationError(DrfpcaError, ValueError):
    """输入数据、参数或形状不合法"""
    exit_code = 2


class ConditionError(DrfpcaError):
    """
    重构定理的条件检查失败（每个组的 (i) 与 (ii) 均不成立）
    report 为 ConditionReport，用于打印是哪个组、哪个条件失败
    """
    exit_code = 3

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NumericalError(DrfpcaError, ArithmeticError):
    """数值失败：次梯度奇异、Lipschitz 常数无定义、点偏离流形等"""
    exit_code = 4
