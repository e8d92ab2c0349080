#include <memory>

#include <rclcpp/rclcpp.hpp>
#include <std_msgs/msg/string.hpp>
#include <std_srvs/srv/trigger.hpp>

using std::placeholders::_1;
using std::placeholders::_2;

class ExampleTwoNode : public rclcpp::Node
{
public:
  ExampleTwoNode()
  : Node("example_two")
  {
    chatter_sub_ = create_subscription<std_msgs::msg::String>(
      "/chatter", 10, std::bind(&ExampleTwoNode::on_chatter, this, _1));
    status_pub_ = create_publisher<std_msgs::msg::String>("~/status", 10);
    reset_srv_ = create_service<std_srvs::srv::Trigger>(
      "reset", std::bind(&ExampleTwoNode::handle_reset, this, _1, _2));
  }

private:
  void on_chatter(const std_msgs::msg::String::SharedPtr msg)
  {
    ++received_;
    std_msgs::msg::String status;
    status.data = "heard " + msg->data;
    status_pub_->publish(status);
  }

  void handle_reset(
    const std::shared_ptr<std_srvs::srv::Trigger::Request>,
    std::shared_ptr<std_srvs::srv::Trigger::Response> response)
  {
    received_ = 0;
    response->success = true;
  }

  rclcpp::Subscription<std_msgs::msg::String>::SharedPtr chatter_sub_;
  rclcpp::Publisher<std_msgs::msg::String>::SharedPtr status_pub_;
  rclcpp::Service<std_srvs::srv::Trigger>::SharedPtr reset_srv_;
  int received_{0};
};

int main(int argc, char ** argv)
{
  rclcpp::init(argc, argv);
  rclcpp::spin(std::make_shared<ExampleTwoNode>());
  rclcpp::shutdown();
  return 0;
}
