import rclpy
from geometry_msgs.msg import PoseArray
from rclpy.node import Node
from sensor_msgs.msg import CameraInfo, Image
from vision_msgs.msg import Detection2DArray


class PoseEstimator(Node):
    """Lifts 2D detections to 3D poses using the depth image."""

    def __init__(self):
        super().__init__('pose_estimator')
        self.depth = None
        self.info = None
        self.create_subscription(Image, '/camera/depth/image_raw', self.on_depth, 10)
        self.create_subscription(CameraInfo, '/camera/camera_info', self.on_info, 10)
        self.create_subscription(Detection2DArray, '/vision/detections', self.on_detections, 10)
        self.poses_pub = self.create_publisher(PoseArray, '/vision/object_poses', 10)

    def on_depth(self, msg):
        self.depth = msg

    def on_info(self, msg):
        self.info = msg

    def on_detections(self, msg):
        if self.depth is None or self.info is None:
            return
        poses = PoseArray()
        poses.header = msg.header
        self.poses_pub.publish(poses)


def main(args=None):
    rclpy.init(args=args)
    rclpy.spin(PoseEstimator())
    rclpy.shutdown()
