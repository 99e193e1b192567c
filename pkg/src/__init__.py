# CXL-SSD Device-in-the-Loop Simulator
# Main source package
