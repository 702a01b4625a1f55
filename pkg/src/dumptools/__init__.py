#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Dump Tools Package
实验报告的导出工具
"""

from .json_to_markdown import ReportToMarkdownConverter

__all__ = ['ReportToMarkdownConverter']
