from setuptools import find_packages, setup

package_name = 'bbb_disassembly'

setup(
    name=package_name,
    version='0.1.0',
    packages=find_packages(exclude=['test']),
    data_files=[
        ('share/ament_index/resource_index/packages', ['resource/' + package_name]),
        ('share/' + package_name, ['package.xml']),
    ],
    install_requires=['setuptools'],
    zip_safe=True,
    entry_points={
        'console_scripts': [
            'arm_controller = bbb_disassembly.arm_controller:main',
            'gripper_controller = bbb_disassembly.tools:gripper_main',
            'screwdriver_controller = bbb_disassembly.tools:screwdriver_main',
            'disassembly_supervisor = bbb_disassembly.supervisor:main',
        ],
    },
)
