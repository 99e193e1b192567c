# Report persistence: report.json and CSV tables
