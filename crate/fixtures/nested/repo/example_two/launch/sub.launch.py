from launch import LaunchDescription
from launch_ros.actions import Node


def generate_launch_description():
    return LaunchDescription([
        Node(package='example_two', executable='exmaple_2_exec', name='Tom'),
    ])
