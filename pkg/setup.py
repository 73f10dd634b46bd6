from setuptools import find_packages, setup
from os.path import abspath, dirname, join

ROOT_DIR = abspath(dirname(__file__))


with open(join(ROOT_DIR, "README.md"), encoding="utf-8") as f:
    readme = f.read()

setup(
    name="spline-arima",
    version="0.1.0",
    description="Cubic-spline gap filling and ARIMA forecasting for daily series",
    long_description=readme,
    long_description_content_type='text/markdown',
    author="Stitch",
    url="http://singer.io",
    classifiers=["Programming Language :: Python :: 3 :: Only"],
    python_requires=">=3.8",
    install_requires=[
        'singer-python>=5.10.0',
        'numpy>=1.21',
        'scipy>=1.7',
    ],
    extras_require= {
          'dev': [
              'pylint',
              'pytest',
          ]
      },
    entry_points="""
    [console_scripts]
    spline-arima=spline_arima:main
    """,
    packages=find_packages(exclude=["tests"]),
    package_data = {
        "spline_arima": ["schemas/*.json"]
    },
    include_package_data=True,
)
