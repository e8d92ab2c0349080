from setuptools import setup

package_name = 'bbb_vision'

setup(
    name=package_name,
    version='0.1.0',
    packages=[package_name],
    data_files=[
        ('share/ament_index/resource_index/packages', ['resource/' + package_name]),
        ('share/' + package_name, ['package.xml']),
    ],
    install_requires=['setuptools'],
    zip_safe=True,
    entry_points={
        'console_scripts': [
            'camera_driver = bbb_vision.camera_driver:main',
            'object_detector = bbb_vision.object_detector:main',
            'pose_estimator = bbb_vision.pose_estimator:main',
            'scene_monitor = bbb_vision.scene_monitor:main',
        ],
    },
)
