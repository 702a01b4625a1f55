# FracWave Lab
# 分数阶波动方程 (1 < α < 2) 的谱方法数值实验室

__version__ = "1.0.0"
__author__ = "FracWave Lab Team"
__description__ = "Numerical lab for time-fractional wave equations: Mittag-Leffler kernels, Strichartz exponents, Picard solver"
