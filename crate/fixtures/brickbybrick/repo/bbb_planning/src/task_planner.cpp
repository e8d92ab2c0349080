#include "bbb_planning/task_planner.hpp"

namespace bbb_planning
{

TaskPlanner::TaskPlanner()
: Node("task_planner")
{
  scene_sub_ = create_subscription<StringMsg>(
    "/vision/scene_state", 10, std::bind(&TaskPlanner::on_scene, this, std::placeholders::_1));
  status_sub_ = create_subscription<StringMsg>(
    "/disassembly/status", 10, std::bind(&TaskPlanner::on_status, this, std::placeholders::_1));
  task_pub_ = create_publisher<StringMsg>("/planning/task", 10);
  target_pub_ = create_publisher<geometry_msgs::msg::PoseStamped>("/planning/target_pose", 10);
}

void TaskPlanner::on_scene(const StringMsg::SharedPtr msg)
{
  StringMsg task;
  task.data = "unscrew part " + std::to_string(next_part_++) + " (" + msg->data + ")";
  task_pub_->publish(task);
  target_pub_->publish(geometry_msgs::msg::PoseStamped());
}

void TaskPlanner::on_status(const StringMsg::SharedPtr msg)
{
  RCLCPP_INFO(get_logger(), "supervisor: %s", msg->data.c_str());
}

}  // namespace bbb_planning
