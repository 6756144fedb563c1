import java.util.Scanner;

public class CircleAreaCalculator {
    public static void main(String[] args) {
        Scanner scanner = new Scanner(System.in);
        System.out.print("Enter the radius: "); // prompt
        double radius = scanner.nextDouble();
        double area = Math.PI * radius * radius; /* area formula */
        System.out.printf("The area is %.2f%n", area);
    }
}
