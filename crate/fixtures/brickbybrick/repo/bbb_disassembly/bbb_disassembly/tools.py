import rclpy
from rclpy.node import Node
from std_msgs.msg import Bool, Float64


class GripperController(Node):
    def __init__(self):
        super().__init__('gripper_controller')
        self.create_subscription(Float64, '/gripper/command', self.on_command, 10)
        self.state_pub = self.create_publisher(Bool, '/gripper/state', 10)

    def on_command(self, msg):
        self.state_pub.publish(Bool(data=msg.data > 0.5))


class ScrewdriverController(Node):
    def __init__(self):
        super().__init__('screwdriver_controller')
        self.create_subscription(Bool, '/screwdriver/command', self.on_command, 10)
        self.torque_pub = self.create_publisher(Float64, '/screwdriver/torque', 10)

    def on_command(self, msg):
        self.torque_pub.publish(Float64(data=1.2 if msg.data else 0.0))


def _run(node_type, args):
    rclpy.init(args=args)
    rclpy.spin(node_type())
    rclpy.shutdown()


def gripper_main(args=None):
    _run(GripperController, args)


def screwdriver_main(args=None):
    _run(ScrewdriverController, args)
