"""
WCT Lab - Utilities Module
Includes report formatting for the console and JSON output.
"""
