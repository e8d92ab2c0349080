import rclpy
from rclpy.node import Node
from std_msgs.msg import String
from std_srvs.srv import Trigger


class ExampleNode(Node):
    def __init__(self):
        super().__init__('example_node')
        self.publisher = self.create_publisher(String, 'chatter', 10)
        self.reset_client = self.create_client(Trigger, 'reset')
        self.count = 0
        self.create_timer(0.5, self.tick)

    def tick(self):
        self.count += 1
        self.publisher.publish(String(data=f'hello {self.count}'))


def main(args=None):
    rclpy.init(args=args)
    node = ExampleNode()
    rclpy.spin(node)
    rclpy.shutdown()
