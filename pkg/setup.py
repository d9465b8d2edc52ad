from setuptools import find_packages, setup

# load VERSION from file
exec(open('taskaug/version.py').read())

with open('requirements.txt') as f:
    requires = f.readlines()
with open('requirements.dev.txt') as f:
    tests_requires = f.readlines()

setup(
    name='taskaug',
    version=VERSION,
    description='Learnable per-task, per-class augmentation policies for multichannel 1D signals',
    author='TaskAug Developers',
    url='https://github.com/taskaug/taskaug-python',
    license='MIT',
    packages=find_packages(include=["taskaug", "taskaug.*"]),
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    keywords=["augmentation", "ecg", "bilevel optimization", "implicit differentiation", "time series"],
    classifiers=[
        'License :: OSI Approved :: MIT License',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
        'Programming Language :: Python',
        'Programming Language :: Python :: 3',
    ],
    install_requires=requires,
    tests_require=tests_requires,
    entry_points={
        'console_scripts': [
            'taskaug=taskaug.cli.main:main',
        ],
    },
    python_requires='>=3.8'
)
