import rclpy
from rclpy.node import Node
from std_msgs.msg import Bool, Float32, Float64, String


class DisassemblySupervisor(Node):
    """Sequences gripper and screwdriver actions for the current task."""

    def __init__(self):
        super().__init__('disassembly_supervisor')
        self.steps_done = 0
        self.create_subscription(String, '/planning/task', self.on_task, 10)
        self.create_subscription(String, '/planning/plan_status', self.on_plan_status, 10)
        self.create_subscription(String, '/arm/state', self.on_arm_state, 10)
        self.create_subscription(Bool, '/gripper/state', self.on_gripper_state, 10)
        self.create_subscription(Float64, '/screwdriver/torque', self.on_torque, 10)
        self.gripper_pub = self.create_publisher(Float64, '/gripper/command', 10)
        self.screwdriver_pub = self.create_publisher(Bool, '/screwdriver/command', 10)
        self.status_pub = self.create_publisher(String, '/disassembly/status', 10)
        self.progress_pub = self.create_publisher(Float32, '/disassembly/progress', 10)
        self.estop_pub = self.create_publisher(Bool, '/system/emergency_stop', 1)

    def on_task(self, msg):
        self.status_pub.publish(String(data=f'starting {msg.data}'))
        self.screwdriver_pub.publish(Bool(data=True))

    def on_plan_status(self, msg):
        if msg.data == 'failed':
            self.estop_pub.publish(Bool(data=True))

    def on_arm_state(self, msg):
        pass

    def on_gripper_state(self, msg):
        self.steps_done += 1
        self.progress_pub.publish(Float32(data=min(1.0, self.steps_done / 10.0)))

    def on_torque(self, msg):
        if msg.data > 2.0:
            self.gripper_pub.publish(Float64(data=0.0))


def main(args=None):
    rclpy.init(args=args)
    rclpy.spin(DisassemblySupervisor())
    rclpy.shutdown()
