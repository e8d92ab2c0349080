import rclpy
from rclpy.node import Node
from sensor_msgs.msg import JointState
from std_msgs.msg import Bool, String
from trajectory_msgs.msg import JointTrajectory


class ArmController(Node):
    def __init__(self):
        super().__init__('arm_controller')
        self.stopped = False
        self.create_subscription(JointTrajectory, '/planning/trajectory', self.on_trajectory, 10)
        self.create_subscription(Bool, '/system/emergency_stop', self.on_estop, 1)
        self.joint_pub = self.create_publisher(JointState, '/joint_states', 10)
        self.state_pub = self.create_publisher(String, '/arm/state', 10)

    def on_trajectory(self, msg):
        if self.stopped:
            self.state_pub.publish(String(data='stopped'))
            return
        state = JointState()
        state.name = list(msg.joint_names)
        self.joint_pub.publish(state)
        self.state_pub.publish(String(data='moving'))

    def on_estop(self, msg):
        self.stopped = msg.data


def main(args=None):
    rclpy.init(args=args)
    rclpy.spin(ArmController())
    rclpy.shutdown()
