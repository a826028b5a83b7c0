"""
drfpca 安装脚本
单文件可执行程序的打包见 bin/build_executable.py
"""

from pathlib import Path

from setuptools import find_packages, setup

from drfpca import __version__

root = Path(__file__).parent


def read_requirements():
    lines = (root / "requirements.txt").read_text(encoding="utf-8").splitlines()
    # 打包与测试工具不作为运行时依赖
    return [line for line in lines if line.strip() and not line.startswith(("pyinstaller", "pytest"))]


setup(
    name="drfpca",
    version=__version__,
    description="Distributionally robust fairness-aware PCA",
    long_description=(root / "README.md").read_text(encoding="utf-8"),
    long_description_content_type="text/markdown",
    packages=find_packages(include=["drfpca", "drfpca.*"]),
    package_data={"drfpca.config": ["settings.json"]},
    python_requires=">=3.10",
    install_requires=read_requirements(),
    extras_require={"test": ["pytest~=8.4.0"], "build": ["pyinstaller~=6.14.0"]},
    entry_points={"console_scripts": ["drfpca=drfpca.main:main"]},
)
