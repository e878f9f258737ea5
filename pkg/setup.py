try:
    from cx_Freeze import setup, Executable
except ImportError:
    # cx_Freeze is only needed to build the frozen executable; fall back to
    # plain setuptools so the package can be installed (e.g. in editable mode).
    from setuptools import setup
    Executable = None

options = {
    "build_exe": {
        "includes": ["modules.__init__",
                     "modules.bounds",
                     "modules.distributions",
                     "modules.errors",
                     "modules.estimators",
                     "modules.experimentjson",
                     "modules.experiments",
                     "modules.experimentstate",
                     "modules.landscape",
                     "modules.numerics",
                     "modules.theory"
                     ],

        "packages": ["numpy", "scipy", "pandas"],

        "include_files": ["assets/",
                          "Experiment Config Instructions.md"]
    }
}

if Executable is not None:
    freeze_kwargs = {"executables": [Executable("main.py", targetName = "selftrain")],
                     "options": options}
else:
    freeze_kwargs = {}

setup(name = "Self-Train",
      version = "0.1b",
      description = "Monte-Carlo checks of self-training on Gaussian mixtures",
      packages = ["modules"],
      py_modules = ["main"],
      install_requires = ["numpy", "scipy", "pandas"],
      **freeze_kwargs
      )
