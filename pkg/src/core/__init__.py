"""核心模块 - 配置加载与结果持久化"""

from .config_manager import ConfigManager, ExperimentConfig
from .data_persistence import DataPersistence

__all__ = ['ConfigManager', 'DataPersistence', 'ExperimentConfig']
