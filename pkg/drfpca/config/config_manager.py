"""
配置管理模块，支持分组、动态修改和持久化
"""

import copy
import json
import logging
import os
from threading import Lock

logger = logging.getLogger(__name__)


class Config:
    """
    配置管理类，支持分组访问、动态修改和持久化
    文件中的分组按键覆盖默认值，缺失的键保留默认值
    """
    _default_config = {
        "solver": {
            "iterations": 200,
            "restarts": 5,
            "retraction": "polar",
            "seed": 0,
            "step_override": None,
            "workers": None
        },
        "experiment": {
            "k": 3,
            "lambda_grid": [0.0, 0.5, 1.0, 1.5, 2.0, 2.5],
            "alpha_grid": [0.05, 0.1, 0.15],
            "split": 0.3,
            "folds": 3,
            "test_center": "train"
        },
        "data": {
            "delimiter": ",",
            "std_min": 1e-5,
            "std_max": 1000.0
        },
        "output": {
            "directory": "output",
            "matrix_encoding": "nested"
        },
        "log": {
            "level": "INFO"
        }
    }

    def __init__(self, config_path=None):
        self._lock = Lock()
        self._config_path = config_path or os.path.join(os.path.dirname(__file__), "settings.json")
        self._config = copy.deepcopy(self._default_config)
        self.load()

    @property
    def path(self):
        return self._config_path

    def load(self):
        """
        从json文件加载配置，按分组合并
        """
        if not os.path.exists(self._config_path):
            logger.debug("No settings file at %s, using defaults", self._config_path)
            return
        with open(self._config_path, "r", encoding="utf-8-sig") as f:
            data = json.load(f)
        for section, values in data.items():
            if isinstance(values, dict) and isinstance(self._config.get(section), dict):
                self._config[section].update(values)
            else:
                self._config[section] = values

    def save(self, path=None):
        """
        保存配置到json文件，path 为空时写回加载的文件
        """
        path = path or self._config_path
        data = self.to_dict()
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, indent=4, ensure_ascii=False)
        logger.info("Settings saved to %s", path)

    def get(self, section, key=None, default=None):
        """
        获取分组配置参数
        :param section: 配置分组名，如"solver"
        :param key: 分组下的具体参数名，如"iterations"
        :param default: 默认值
        """
        group = self._config.get(section, {})
        if key is None:
            return dict(group)
        return group.get(key, default)

    def set(self, section, key, value, persist=True):
        """
        动态设置分组配置参数，默认持久化
        """
        with self._lock:
            if section not in self._config:
                self._config[section] = {}
            self._config[section][key] = value
        if persist:
            self.save()

    def to_dict(self):
        with self._lock:
            return copy.deepcopy(self._config)

    @property
    def solver(self):
        """求解器分组"""
        return self.get("solver")

    @property
    def experiment(self):
        """实验分组（网格、划分、折数）"""
        return self.get("experiment")

    @property
    def data(self):
        return self.get("data")

    @property
    def output(self):
        return self.get("output")

    @property
    def log(self):
        """获取日志分组配置"""
        return self.get("log")


# 单例配置实例
_config_instance = None


def get_config(config_path=None):
    """
    获取全局配置实例；传入路径时以该文件重新创建
    """
    global _config_instance
    if _config_instance is None or (config_path and _config_instance.path != config_path):
        _config_instance = Config(config_path)
    return _config_instance


def reset_config():
    """丢弃全局实例（测试用）"""
    global _config_instance
    _config_instance = None
