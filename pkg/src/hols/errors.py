# src/hols/errors.py
from __future__ import annotations


class HolsError(Exception):
    """hols の全エラーの基底クラス"""


class ParseError(HolsError):
    def __init__(self, line_number: int, reason: str) -> None:
        super().__init__(f"line {line_number}: {reason}")
        self.line_number = line_number  # 1始まり。ファイル全体のエラーは0
        self.reason = reason


class ValidationError(HolsError):
    def __init__(self, reason: str, line_number: int | None = None) -> None:
        super().__init__(reason if line_number is None else f"line {line_number}: {reason}")
        self.line_number = line_number
        self.reason = reason


class NumericError(HolsError):
    pass


class RefusalError(HolsError):
    """計算量が大きすぎる入力を拒否する（総当たりオラクル、密行列ソルバ）"""


class ConfigError(HolsError):
    pass
