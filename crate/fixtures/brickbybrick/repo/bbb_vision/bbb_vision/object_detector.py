import rclpy
from rclpy.node import Node
from sensor_msgs.msg import Image
from vision_msgs.msg import Detection2DArray

DETECTIONS = 'vision/detections'


class ObjectDetector(Node):
    def __init__(self):
        super().__init__('object_detector')
        self.create_subscription(Image, '/camera/color/image_raw', self.on_image, 10)
        self.detections_pub = self.create_publisher(Detection2DArray, DETECTIONS, 10)
        self.annotated_pub = self.create_publisher(Image, 'vision/annotated_image', 10)

    def on_image(self, msg):
        out = Detection2DArray()
        out.header = msg.header
        self.detections_pub.publish(out)
        self.annotated_pub.publish(msg)


def main(args=None):
    rclpy.init(args=args)
    rclpy.spin(ObjectDetector())
    rclpy.shutdown()
