"""
测试模块
各包单元测试、integration 端到端流程与 cli 退出码测试
"""
