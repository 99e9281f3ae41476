# src/hols/logging_utils.py
from __future__ import annotations

import logging
import os
import sys
from pathlib import Path

LOGGER_NAME = "hols"


def _file_handler(log_path: Path, fmt: logging.Formatter) -> logging.FileHandler:
    log_path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(log_path, encoding="utf-8")
    handler.setFormatter(fmt)
    return handler


def setup_logging(log_path: Path = Path("logs/run.log")) -> logging.Logger:
    logger = logging.getLogger(LOGGER_NAME)
    logger.setLevel(logging.INFO)

    fmt = logging.Formatter(
        fmt="%(asctime)s [%(levelname)s] %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    # 二重登録防止（再実行やテストでハンドラが増えないようにする）
    if logger.handlers:
        target = os.path.abspath(log_path)
        for h in list(logger.handlers):
            if isinstance(h, logging.FileHandler):
                # 出力先が変わったらファイルハンドラだけ差し替える
                if h.baseFilename != target:
                    logger.removeHandler(h)
                    h.close()
                    logger.addHandler(_file_handler(log_path, fmt))
            elif type(h) is logging.StreamHandler:
                # コンソール出力だけは現在の stderr に付け替える
                h.setStream(sys.stderr)
        return logger

    logger.addHandler(_file_handler(log_path, fmt))

    # 診断メッセージは stderr のみ（stdout はスクリプト用の結果専用）
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(fmt)
    logger.addHandler(console_handler)

    return logger
