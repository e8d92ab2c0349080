import rclpy
from rclpy.node import Node
from sensor_msgs.msg import CameraInfo, Image


class CameraDriver(Node):
    def __init__(self):
        super().__init__('camera_driver')
        self.color_pub = self.create_publisher(Image, '/camera/color/image_raw', 10)
        self.depth_pub = self.create_publisher(Image, '/camera/depth/image_raw', 10)
        self.info_pub = self.create_publisher(CameraInfo, '/camera/camera_info', 10)
        self.timer = self.create_timer(1.0 / 30.0, self.capture)

    def capture(self):
        stamp = self.get_clock().now().to_msg()
        for pub in (self.color_pub, self.depth_pub):
            msg = Image()
            msg.header.stamp = stamp
            pub.publish(msg)
        info = CameraInfo()
        info.header.stamp = stamp
        self.info_pub.publish(info)


def main(args=None):
    rclpy.init(args=args)
    node = CameraDriver()
    rclpy.spin(node)
    node.destroy_node()
    rclpy.shutdown()


if __name__ == '__main__':
    main()
