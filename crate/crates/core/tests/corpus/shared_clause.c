// Every thread stores to an explicitly shared scalar.
int result;

int main() {
  int flag;
#pragma omp parallel shared(flag)
  {
    flag = 1;
  }
  result = flag;
}
