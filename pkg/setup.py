import os
import re
from setuptools import setup, find_packages

#Path of setup file to establish version
setupdir = os.path.abspath(os.path.dirname(__file__))

def find_version(init_file):
	version_file = open(init_file).read()
	version_match = re.search(r"^__version__ = ['\"]([^'\"]*)['\"]", version_file, re.M)
	if version_match:
		return version_match.group(1)
	else:
		raise RuntimeError("Unable to find version string.")

def readme():
	with open('README.md') as f:
		return f.read()

setup(name='thermopot',
		version=find_version(os.path.join(setupdir, "thermopot", "__init__.py")),	#get version from __init__.py
		description='Thermodynamically consistent free energy and dissipation potentials learned from trajectory data',
		long_description=readme(),
		long_description_content_type='text/markdown',
		license='MIT',
		packages=find_packages(exclude=["tests"]),
		package_data={"thermopot": ["configs/*.yaml"]},
		entry_points={
			'console_scripts': ['THERMOPOT=thermopot.THERMOPOT:main',
								'thermopot=thermopot.THERMOPOT:main']
		},
		python_requires='>=3.8',
		install_requires=[
			'numpy>=1.20',			#np.broadcast_shapes
			'scipy>=1.6',			#scipy.integrate.trapezoid
			'pandas',
			'pyyaml>5.1',
		],
		extras_require={
			'tests': ['pytest'],
		},
		classifiers=[
			'License :: OSI Approved :: MIT License',
			'Intended Audience :: Science/Research',
			'Topic :: Scientific/Engineering :: Physics',
			'Programming Language :: Python :: 3'
		],
		zip_safe=False
		)
