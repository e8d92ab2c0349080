#include "bbb_planning/task_planner.hpp"

int main(int argc, char ** argv)
{
  rclcpp::init(argc, argv);
  rclcpp::spin(std::make_shared<bbb_planning::TaskPlanner>());
  rclcpp::shutdown();
  return 0;
}
