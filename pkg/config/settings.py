"""
配置管理模块
负责加载和管理应用程序的环境配置项（输出目录、日志、并发与解码分块）
"""

import os
import threading
from pathlib import Path

from dotenv import load_dotenv
from loguru import logger
from pydantic import AliasChoices, Field
from pydantic_settings import BaseSettings

# 项目根目录（确保无论从何处运行，都定位到项目根的 .env）
_ROOT_DIR = Path(__file__).resolve().parents[1]

# 加载环境变量（显式指定项目根 .env，避免因工作目录变化导致加载错误）
load_dotenv(dotenv_path=_ROOT_DIR / ".env")

LOG_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} | {level} | {name}:{function}:{line} | {message}"


class Settings(BaseSettings):
    """应用程序配置类"""

    # 应用基础配置
    app_name: str = Field(default="AB-UPT-Desk")
    app_version: str = Field(default="1.0.0")

    # 日志配置
    log_level: str = Field(default="INFO")
    log_file: str = Field(default="./logs/abupt.log")

    # 输出根目录：所有子命令在未显式指定 --out 时写入该目录
    output_root: str = Field(default="./runs", validation_alias=AliasChoices("ABUPT_OUTPUT_ROOT", "output_root"))

    # 数据生成并发度
    num_workers: int = Field(default=4, ge=1, validation_alias=AliasChoices("ABUPT_NUM_WORKERS", "num_workers"))

    # 查询解码分块大小
    query_chunk: int = Field(default=4096, ge=1, validation_alias=AliasChoices("ABUPT_QUERY_CHUNK", "query_chunk"))

    class Config:
        # 显式指定项目根的 .env 文件
        env_file = str(_ROOT_DIR / ".env")
        env_file_encoding = "utf-8"
        case_sensitive = False
        extra = "ignore"

    def get_log_dir(self) -> str:
        """获取日志目录路径"""
        return os.path.dirname(self.log_file)

    def get_output_root(self) -> Path:
        """获取输出根目录"""
        return Path(self.output_root)

    def ensure_directories(self) -> None:
        """确保必要的目录存在"""
        for directory in (self.get_log_dir(), self.output_root):
            if directory and not os.path.exists(directory):
                os.makedirs(directory, exist_ok=True)


# 全局配置实例
settings = Settings()

_logging_lock = threading.Lock()
_logging_ready = False


def get_settings() -> Settings:
    """获取配置实例"""
    return settings


def setup_logging() -> None:
    """添加全局文件日志（幂等，重复调用不会重复添加 sink）"""
    global _logging_ready
    with _logging_lock:
        if _logging_ready:
            return
        settings.ensure_directories()
        logger.add(
            settings.log_file,
            rotation="10 MB",
            retention="30 days",
            level=settings.log_level,
            format=LOG_FORMAT,
        )
        _logging_ready = True


__all__ = ["Settings", "settings", "get_settings", "setup_logging", "LOG_FORMAT"]
