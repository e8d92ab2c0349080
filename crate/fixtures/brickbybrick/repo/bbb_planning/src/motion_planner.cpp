#include <geometry_msgs/msg/pose_stamped.hpp>
#include <rclcpp/rclcpp.hpp>
#include <sensor_msgs/msg/joint_state.hpp>
#include <std_msgs/msg/bool.hpp>
#include <std_msgs/msg/string.hpp>
#include <trajectory_msgs/msg/joint_trajectory.hpp>

namespace
{
const char * const kTrajectoryTopic = "/planning/trajectory";
}

class MotionPlanner : public rclcpp::Node
{
public:
  MotionPlanner()
  : Node("motion_planner")
  {
    using std::placeholders::_1;
    target_sub_ = this->create_subscription<geometry_msgs::msg::PoseStamped>(
      "/planning/target_pose", 10, std::bind(&MotionPlanner::on_target, this, _1));
    joints_sub_ = this->create_subscription<sensor_msgs::msg::JointState>(
      "/joint_states", rclcpp::SensorDataQoS(), std::bind(&MotionPlanner::on_joints, this, _1));
    estop_sub_ = this->create_subscription<std_msgs::msg::Bool>(
      "/system/emergency_stop", 1, std::bind(&MotionPlanner::on_estop, this, _1));
    trajectory_pub_ = this->create_publisher<trajectory_msgs::msg::JointTrajectory>(kTrajectoryTopic, 10);
    status_pub_ = this->create_publisher<std_msgs::msg::String>("/planning/plan_status", 10);
  }

private:
  void on_target(const geometry_msgs::msg::PoseStamped::SharedPtr)
  {
    std_msgs::msg::String status;
    status.data = stopped_ ? "failed" : "planned";
    if (!stopped_) {
      trajectory_pub_->publish(trajectory_msgs::msg::JointTrajectory());
    }
    status_pub_->publish(status);
  }

  void on_joints(const sensor_msgs::msg::JointState::SharedPtr msg) { last_joints_ = *msg; }

  void on_estop(const std_msgs::msg::Bool::SharedPtr msg) { stopped_ = msg->data; }

  rclcpp::Subscription<geometry_msgs::msg::PoseStamped>::SharedPtr target_sub_;
  rclcpp::Subscription<sensor_msgs::msg::JointState>::SharedPtr joints_sub_;
  rclcpp::Subscription<std_msgs::msg::Bool>::SharedPtr estop_sub_;
  rclcpp::Publisher<trajectory_msgs::msg::JointTrajectory>::SharedPtr trajectory_pub_;
  rclcpp::Publisher<std_msgs::msg::String>::SharedPtr status_pub_;
  sensor_msgs::msg::JointState last_joints_;
  bool stopped_{false};
};

int main(int argc, char ** argv)
{
  rclcpp::init(argc, argv);
  rclcpp::spin(std::make_shared<MotionPlanner>());
  rclcpp::shutdown();
  return 0;
}
