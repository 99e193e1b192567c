"""
Write-log compaction.

Compaction walks the first level of the log index in ascending page order,
persists every page that holds buffered cachelines, and reclaims the whole
ring. The sequential variant finishes one page before starting the next; the
parallel variant issues all reads as one NAND batch, merges, then issues all
programs as a second batch so the channel/way units overlap.
"""

from dataclasses import dataclass
from typing import TYPE_CHECKING, Dict, Optional

from src.analytics.metrics import EventKind
from src.config.settings import CompactionMode
from src.firmware.device_clock import CostCategory
from src.firmware.write_log import CACHELINE_BYTES, WriteLog
from src.nand.latency import NandOpKind
from src.nand.logic_cost import LogicCategory
from src.utils.logger import get_logger

if TYPE_CHECKING:
    from src.firmware.handler import CxlSsdFirmware

logger = get_logger(__name__)


@dataclass
class CompactionReport:
    """What a compaction run did and how long it took."""

    mode: CompactionMode
    pages: int = 0
    reads: int = 0
    programs: int = 0
    lines_merged: int = 0
    entries_reclaimed: int = 0
    start_time_ns: int = 0
    wall_time_ns: int = 0
    nand_wait_ns: int = 0
    merge_ns: int = 0


def merge_logged_lines(record: Dict[int, int], log: WriteLog, data: Optional[bytearray]) -> int:
    """Copy every logged cacheline of a page record into ``data``; returns lines merged."""
    if data is not None:
        for offset, slot in record.items():
            start = offset * CACHELINE_BYTES
            data[start:start + CACHELINE_BYTES] = log.entry(slot).payload
    return len(record)


class LogCompactor:
    """Runs compaction against a firmware instance's log, index, cache and NAND."""

    def __init__(self, firmware: "CxlSsdFirmware"):
        self.firmware = firmware

    def _merge(self, report: CompactionReport, page_number: int, data: Optional[bytearray]):
        fw = self.firmware
        report.lines_merged += merge_logged_lines(fw.index.page_record(page_number), fw.log, data)
        cost = fw.costs.cost(LogicCategory.CACHE_INSERT)
        fw.clock.charge(CostCategory.CACHE_INSERT, cost)
        report.merge_ns += cost

    def _wait(self, report: CompactionReport, complete_time_ns: int):
        before = self.firmware.clock.now_ns
        self.firmware.clock.wait_until(complete_time_ns)
        report.nand_wait_ns += self.firmware.clock.now_ns - before

    def run_sequential(self) -> CompactionReport:
        fw = self.firmware
        report = CompactionReport(mode=CompactionMode.SEQUENTIAL, start_time_ns=fw.clock.now_ns)

        for page_number in fw.index.sorted_pages():
            frame = fw.cache.get(page_number, touch=False)
            if frame is not None:
                schedule = fw.timing.submit([(NandOpKind.PROGRAM, page_number)], fw.clock.now_ns)
                self._wait(report, schedule.complete_time_ns)
                fw.flash.program_page(page_number, frame.data)
                frame.dirty = False
            else:
                schedule = fw.timing.submit([(NandOpKind.READ, page_number)], fw.clock.now_ns)
                self._wait(report, schedule.complete_time_ns)
                data = fw.flash.read_page(page_number)
                report.reads += 1
                self._merge(report, page_number, data)
                schedule = fw.timing.submit([(NandOpKind.PROGRAM, page_number)], fw.clock.now_ns)
                self._wait(report, schedule.complete_time_ns)
                fw.flash.program_page(page_number, data)
            report.programs += 1
            report.pages += 1

        return self._finish(report)

    def run_parallel(self) -> CompactionReport:
        fw = self.firmware
        report = CompactionReport(mode=CompactionMode.PARALLEL, start_time_ns=fw.clock.now_ns)
        pages = fw.index.sorted_pages()
        missing = [page for page in pages if page not in fw.cache]

        images: Dict[int, Optional[bytearray]] = {}
        if missing:
            schedule = fw.timing.submit([(NandOpKind.READ, page) for page in missing], fw.clock.now_ns)
            self._wait(report, schedule.complete_time_ns)
            report.reads += len(missing)
            for page_number in missing:
                images[page_number] = fw.flash.read_page(page_number)
                self._merge(report, page_number, images[page_number])

        if pages:
            schedule = fw.timing.submit([(NandOpKind.PROGRAM, page) for page in pages], fw.clock.now_ns)
            self._wait(report, schedule.complete_time_ns)
            for page_number in pages:
                frame = fw.cache.get(page_number, touch=False)
                if frame is not None:
                    fw.flash.program_page(page_number, frame.data)
                    frame.dirty = False
                else:
                    fw.flash.program_page(page_number, images[page_number])
            report.programs += len(pages)
            report.pages = len(pages)

        return self._finish(report)

    def _finish(self, report: CompactionReport) -> CompactionReport:
        fw = self.firmware
        fw.index.clear()
        report.entries_reclaimed = fw.log.reclaim()
        report.wall_time_ns = fw.clock.now_ns - report.start_time_ns
        fw.compaction_programs += report.programs
        if report.pages:
            fw.compactions += 1

        if fw.metrics is not None and report.pages:
            fw.metrics.emit(
                kind=EventKind.COMPACTION,
                latency_ns=report.wall_time_ns,
                breakdown={CostCategory.NAND_WAIT.value: report.nand_wait_ns,
                           CostCategory.CACHE_INSERT.value: report.merge_ns},
                sim_time_ns=report.start_time_ns,
            )
        logger.debug(f"{report.mode.value} compaction: {report.pages} pages, {report.reads} reads, "
                     f"{report.programs} programs in {report.wall_time_ns}ns")
        return report
