"""
CXL-SSD device firmware: write log, log index, data cache, compaction and the
command handler that serves CXL.mem commands.
"""
