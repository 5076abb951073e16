"""
Benchmark dataset catalog

The nine UCI datasets of the benchmark protocol. Nothing is bundled: download
each file from the UCI repository, drop identifier columns, and save it as a
headerless CSV named ``<key>.csv`` with the label in ``label_column``.
"""

from dataclasses import dataclass
from typing import Optional


@dataclass(frozen=True)
class CatalogEntry:
    key: str
    title: str
    uci_name: str
    examples: int
    features: int
    classes: int
    label_column: int = -1
    filtered: bool = False
    notes: Optional[str] = None

    @property
    def filename(self) -> str:
        return f"{self.key}.csv"


BENCHMARKS = (
    CatalogEntry('pima', 'Pima Indian diabetes', 'Pima Indians Diabetes', 768, 8, 2),
    CatalogEntry('pima', 'Pima Indian diabetes (filtered)', 'Pima Indians Diabetes', 768, 8, 2, filtered=True),
    CatalogEntry('wdbc', 'Breast Cancer Diagnostic', 'Breast Cancer Wisconsin (Diagnostic)', 569, 30, 2,
                 label_column=0, notes='drop the ID column; diagnosis first'),
    CatalogEntry('haberman', 'Haberman', "Haberman's Survival", 306, 3, 2),
    CatalogEntry('liver', 'Liver Disorder', 'Liver Disorders (BUPA)', 345, 6, 2,
                 notes='selector field used as the class label'),
    CatalogEntry('liver', 'Liver Disorder (filtered)', 'Liver Disorders (BUPA)', 345, 6, 2, filtered=True,
                 notes='selector field used as the class label'),
    CatalogEntry('thyroid', 'New-thyroid', 'Thyroid Disease (new-thyroid)', 215, 5, 3,
                 label_column=0, notes='class first'),
    CatalogEntry('cancer', 'Cancer', 'Breast Cancer Wisconsin (Original)', 699, 9, 2,
                 notes='drop the ID column and the 16 rows with missing values'),
    CatalogEntry('phishing', 'Phishing', 'Website Phishing', 1353, 9, 3),
)


def describe() -> str:
    """Download instructions, one line per benchmark"""
    lines = []
    for entry in BENCHMARKS:
        line = (
            f"{entry.title:<34} UCI '{entry.uci_name}' -> {entry.filename} "
            f"(N={entry.examples}, F={entry.features}, K={entry.classes}, label column {entry.label_column})"
        )
        if entry.filtered:
            line += ' [IQR filtered]'
        if entry.notes:
            line += f" - {entry.notes}"
        lines.append(line)
    return '\n'.join(lines)
