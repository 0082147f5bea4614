'''
checkpoint_utils.py
===================
该文件提供扫描检查点文件的读写，供 scanner.run_scan 断点续跑使用。

格式：纯文本，每行一个 JSON 对象（一个已完成分块），按完成顺序追加。
1. `append_checkpoint`：追加一行并 flush + fsync，进程被杀时已完成的分块不会丢失。
2. `load_checkpoint`：逐行读回为指定的 pydantic 模型；任何无法解析的行立即报错并给出行号，
   不跳过、不猜测。

更新条件：
- 当检查点记录的字段发生变化时，只需修改 scanner.py 中的 ChunkResult 模型，本文件无需改动。
- 如果需要更换存储格式（例如改为 SQLite），重写本文件的两个函数即可。
'''

import os
from typing import List, Tuple, Type, TypeVar

from pydantic import BaseModel, ValidationError

RecordT = TypeVar("RecordT", bound=BaseModel)


class CheckpointError(ValueError):
    """检查点文件中某一行损坏或与当前扫描不一致。"""

    def __init__(self, path: str, line_no: int, reason: str):
        self.path = path
        self.line_no = line_no
        super().__init__(f"检查点 {path} 第 {line_no} 行无效: {reason}")


def load_checkpoint(path: str, model: Type[RecordT]) -> List[Tuple[int, RecordT]]:
    """返回 [(行号, 记录)]；文件不存在时返回空列表。空行忽略。"""
    if not os.path.exists(path):
        return []

    records: List[Tuple[int, RecordT]] = []
    try:
        with open(path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    records.append((line_no, model.model_validate_json(line)))
                except ValidationError as e:
                    raise CheckpointError(path, line_no, f"{e.error_count()} 处字段错误: {e.errors()[0]['msg']}") from e
    except UnicodeDecodeError as e:
        raise CheckpointError(path, 0, f"不是 UTF-8 文本: {e}") from e
    return records


def append_checkpoint(path: str, record: BaseModel) -> None:
    """追加一条记录（单行 JSON）。只应由扫描的合并方调用。"""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "a", encoding="utf-8") as f:
        f.write(record.model_dump_json() + "\n")
        f.flush()
        os.fsync(f.fileno())
