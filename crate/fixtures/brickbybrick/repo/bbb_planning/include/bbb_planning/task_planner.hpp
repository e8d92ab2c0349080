#pragma once

#include <geometry_msgs/msg/pose_stamped.hpp>
#include <rclcpp/rclcpp.hpp>
#include <std_msgs/msg/string.hpp>

namespace bbb_planning
{

using StringMsg = std_msgs::msg::String;

class TaskPlanner : public rclcpp::Node
{
public:
  TaskPlanner();

private:
  void on_scene(const StringMsg::SharedPtr msg);
  void on_status(const StringMsg::SharedPtr msg);

  rclcpp::Subscription<StringMsg>::SharedPtr scene_sub_;
  rclcpp::Subscription<StringMsg>::SharedPtr status_sub_;
  rclcpp::Publisher<StringMsg>::SharedPtr task_pub_;
  rclcpp::Publisher<geometry_msgs::msg::PoseStamped>::SharedPtr target_pub_;
  int next_part_{0};
};

}  // namespace bbb_planning
