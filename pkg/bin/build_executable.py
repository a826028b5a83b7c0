"""
drfpca 命令行打包脚本
使用 PyInstaller 将 drfpca 打包为单个可执行文件，附带默认配置
"""

import os
import platform
import shutil
import sys
from pathlib import Path

project_root = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(project_root))

try:
    import PyInstaller.__main__
except ImportError:
    print("错误: 未安装 PyInstaller，请运行: pip install pyinstaller")
    PyInstaller = None
    sys.exit(1)


class AppPackager:
    """命令行程序打包器"""

    def __init__(self):
        self.app_name = "drfpca"
        self.root_dir = project_root
        self.build_dir = self.root_dir / "build"
        self.dist_dir = self.root_dir / "dist"
        self.spec_file = self.root_dir / f"{self.app_name}.spec"
        self.exe_name = f"{self.app_name}.exe" if platform.system() == "Windows" else self.app_name

        # 线程池、求解器等模块均为静态导入，这里只列出 PyInstaller 容易漏掉的后端
        self.hidden_imports = [
            "matplotlib.backends.backend_agg",
            "matplotlib.backends.backend_svg",
            "scipy.linalg",
            "pandas",
            "psutil",
            "portalocker",
        ]

        self.data_files = [
            f"drfpca/config/settings.json{os.pathsep}drfpca/config",
            f"README.md{os.pathsep}.",
        ]

        self.excludes = [
            "tkinter",
            "pydoc",
            "pdb",
            "curses",
            "test",
            "tests",
            "pytest",
            "pip",
            "wheel",
        ]

    def validate_environment(self):
        print("=" * 60)
        print("验证打包环境...")
        print("=" * 60)

        critical_files = {
            "命令行入口": "drfpca/main.py",
            "默认配置": "drfpca/config/settings.json",
        }
        missing = []
        for desc, file_path in critical_files.items():
            if not (self.root_dir / file_path).exists():
                missing.append(f"{desc}: {file_path}")
            else:
                print(f"✓ {desc}: {file_path}")

        if missing:
            print("\n错误: 以下关键文件缺失:")
            for item in missing:
                print(f"  - {item}")
            return False

        print("\n环境验证通过!")
        return True

    @staticmethod
    def _remove(items):
        for item in items:
            if item.exists():
                try:
                    if item.is_dir():
                        shutil.rmtree(item)
                    else:
                        item.unlink()
                    print(f"✓ 清理: {item.name}")
                except OSError as e:
                    print(f"⚠ 清理失败 {item.name}: {e}")

    def build_pyinstaller_command(self):
        cmd = [
            "drfpca/main.py",
            "--name", self.app_name,
            "--onefile",
            "--console",
            "--distpath", str(self.dist_dir),
            "--workpath", str(self.build_dir),
            "--specpath", str(self.root_dir),
            "--paths", str(self.root_dir),
            "--clean",
            "--noconfirm",
        ]
        for data_file in self.data_files:
            cmd.extend(["--add-data", data_file])
        for hidden_import in self.hidden_imports:
            cmd.extend(["--hidden-import", hidden_import])
        for exclude in self.excludes:
            cmd.extend(["--exclude-module", exclude])
        return cmd

    def package_application(self):
        print("\n" + "=" * 60)
        print("开始打包应用程序...")
        print("=" * 60)

        if not self.validate_environment():
            return False
        self._remove([self.build_dir, self.dist_dir, self.spec_file])

        pyinstaller_cmd = self.build_pyinstaller_command()
        print(f"\n应用程序名称: {self.app_name}")
        print(f"输出目录: {self.dist_dir}")
        print(f"隐藏导入: {len(self.hidden_imports)} 个模块")
        print("\nPyInstaller 命令:")
        print(" ".join(pyinstaller_cmd))

        try:
            PyInstaller.__main__.run(pyinstaller_cmd)
        except Exception as e:
            print(f"\n打包失败: {e}")
            return False
        return True

    def verify_build_result(self):
        exe_path = self.dist_dir / self.exe_name
        if not exe_path.exists():
            print("错误: 未生成可执行文件")
            return False
        size_mb = exe_path.stat().st_size / (1024 * 1024)
        print(f"✓ 生成可执行文件: {exe_path}")
        print(f"✓ 文件大小: {size_mb:.2f} MB")
        return True

    def run(self):
        print("drfpca 打包脚本")
        print("=" * 50)
        os.chdir(self.root_dir)
        print(f"工作目录: {self.root_dir}")

        if not self.package_application() or not self.verify_build_result():
            print("\n打包失败，请检查上面的错误信息")
            return 1

        # 保留 dist，清理中间产物
        self._remove([self.build_dir, self.spec_file])
        print("\n" + "=" * 50)
        print("打包完成!")
        print(f"可执行文件位置: {self.dist_dir / self.exe_name}")
        print("=" * 50)
        return 0


if __name__ == "__main__":
    sys.exit(AppPackager().run())
