from launch import LaunchDescription
from launch_ros.actions import Node


def generate_launch_description():
    vision = [
        Node(package='bbb_vision', executable='camera_driver', name='camera_driver'),
        Node(package='bbb_vision', executable='object_detector', name='object_detector'),
        Node(package='bbb_vision', executable='pose_estimator', name='pose_estimator'),
        Node(package='bbb_vision', executable='scene_monitor'),
    ]
    planning = [
        Node(package='bbb_planning', executable='task_planner', output='screen'),
        Node(package='bbb_planning', executable='motion_planner', output='screen'),
    ]
    disassembly = [
        Node(package='bbb_disassembly', executable='arm_controller'),
        Node(package='bbb_disassembly', executable='gripper_controller'),
        Node(package='bbb_disassembly', executable='screwdriver_controller'),
        Node(package='bbb_disassembly', executable='disassembly_supervisor', name='disassembly_supervisor'),
    ]
    return LaunchDescription(vision + planning + disassembly)
