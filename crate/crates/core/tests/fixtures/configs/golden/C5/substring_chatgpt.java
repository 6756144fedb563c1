import java.util.Scanner;

public class MaxConsecutiveSubstring {
    public static void main(String[] args) {
        Scanner scanner = new Scanner(System.in);
        System.out.print("Enter a string: ");
        String input = scanner.nextLine();

        String maxSubstring = "";
        String currentSubstring = "";

        for (int i = 0; i < input.length(); i++) {
            if (i == 0 || input.charAt(i) > input.charAt(i - 1)) {
                currentSubstring += input.charAt(i);
            } else {
                currentSubstring = String.valueOf(input.charAt(i));
            }

            if (currentSubstring.length() > maxSubstring.length()) {
                maxSubstring = currentSubstring;
            }
        }

        System.out.println("Maximum consecutive increasingly ordered substring: " + maxSubstring);
        scanner.close();
    }
}
