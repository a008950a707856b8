#include <cstdio>

int main() {
  std::puts("wldecode: command-line interface under construction");
  return 0;
}
