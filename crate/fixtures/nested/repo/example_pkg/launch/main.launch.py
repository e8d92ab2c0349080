import os

from ament_index_python.packages import get_package_share_directory
from launch import LaunchDescription
from launch.actions import GroupAction, IncludeLaunchDescription
from launch.launch_description_sources import PythonLaunchDescriptionSource
from launch_ros.actions import Node, PushRosNamespace


def generate_launch_description():
    sub_launch = os.path.join(get_package_share_directory('example_two'), 'launch', 'sub.launch.py')
    return LaunchDescription([
        Node(package='example_pkg', executable='example', name='example_node'),
        GroupAction([
            PushRosNamespace('main'),
            IncludeLaunchDescription(PythonLaunchDescriptionSource(sub_launch)),
        ]),
        GroupAction([
            PushRosNamespace('backup'),
            Node(package='example_two', executable='exmaple_2_exec', name='Tom'),
        ]),
    ])
