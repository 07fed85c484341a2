"""
WCT Lab - Scenario Data Module
Scenario files, reference fixtures and campaign generators.
"""
