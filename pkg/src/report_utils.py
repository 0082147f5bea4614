'''
report_utils.py
===============
该文件包含所有与逐 N 报表文件相关的辅助函数。
主要功能包括：
1. 写 CSV 报表 (`write_csv_report`)，列为 N,D,O,E,residue；residue 是截断到 12 位的十进制字符串。
2. 写 Excel 报表 (`write_xlsx_report`)，使用 `openpyxl`，表头相同，末行写入行数统计。
3. `write_report` 按文件后缀分派：.xlsx → Excel，其余 → CSV。

N 以字符串写入 Excel，避免超过 15 位有效数字的整数被表格软件当作浮点数截断。

更新条件：
- 当报表的列（如增加残数分子分母）或格式需要修改时，更新 REPORT_HEADER 与两个写入函数。
- 如果更换了处理 Excel 的库 (当前为 `openpyxl`)，需要重写 `write_xlsx_report`。
'''

import csv
import os
from typing import Iterable, Sequence, Tuple

from openpyxl import Workbook

ReportRow = Tuple[int, int, int, int, str]
REPORT_HEADER = ["N", "D", "O", "E", "residue"]


def _prepare_dir(path: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)


def write_csv_report(rows: Iterable[ReportRow], path: str) -> int:
    """写 CSV，返回写入的数据行数。"""
    _prepare_dir(path)
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(REPORT_HEADER)
        for n, d, o, e, residue in rows:
            writer.writerow([str(n), d, o, e, residue])
            count += 1
    return count


def write_xlsx_report(rows: Iterable[ReportRow], path: str) -> int:
    """写 Excel 工作簿（单表 Residues），返回写入的数据行数。"""
    _prepare_dir(path)
    wb = Workbook(write_only=True)
    ws = wb.create_sheet(title="Residues")
    ws.append(REPORT_HEADER)
    count = 0
    for n, d, o, e, residue in rows:
        ws.append([str(n), d, o, e, residue])
        count += 1
    ws.append(["总计", count])
    wb.save(path)
    return count


def write_report(rows: Sequence[ReportRow], path: str) -> int:
    if str(path).lower().endswith(".xlsx"):
        return write_xlsx_report(rows, str(path))
    return write_csv_report(rows, str(path))
