import rclpy
from geometry_msgs.msg import PoseArray
from rclpy.node import Node
from sensor_msgs.msg import Image
from std_msgs.msg import Float32, String


class SceneMonitor(Node):
    def __init__(self):
        super().__init__('scene_monitor')
        self.progress = 0.0
        self.create_subscription(PoseArray, '/vision/object_poses', self.on_poses, 10)
        self.create_subscription(Float32, '/disassembly/progress', self.on_progress, 10)
        self.create_subscription(Image, '/vision/annotated_image', self.on_annotated, 1)
        self.state_pub = self.create_publisher(String, '/vision/scene_state', 10)

    def on_poses(self, msg):
        self.state_pub.publish(String(data=f'{len(msg.poses)} parts, {self.progress:.0%} done'))

    def on_progress(self, msg):
        self.progress = msg.data

    def on_annotated(self, msg):
        pass


def main(args=None):
    rclpy.init(args=args)
    rclpy.spin(SceneMonitor())
    rclpy.shutdown()
