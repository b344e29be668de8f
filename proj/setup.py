import os
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        out = Path(self.get_ext_fullpath(ext.name)).resolve().parent
        src = Path(__file__).resolve().parent
        build = Path(self.build_temp).resolve()
        build.mkdir(parents=True, exist_ok=True)
        cfg = "Debug" if self.debug else "Release"
        subprocess.run(
            ["cmake", "-S", str(src), "-B", str(build),
             f"-DCMAKE_BUILD_TYPE={cfg}",
             f"-DPython3_EXECUTABLE={sys.executable}"],
            check=True)
        subprocess.run(
            ["cmake", "--build", str(build), "--target", "_core",
             "-j", str(os.cpu_count() or 1)],
            check=True)
        pkg = out / "ilro"
        pkg.mkdir(parents=True, exist_ok=True)
        for so in (build / "python" / "ilro").glob("_core*"):
            self.copy_file(str(so), str(pkg / so.name))


setup(
    ext_modules=[CMakeExtension("ilro._core")],
    cmdclass={"build_ext": CMakeBuild},
)
